// version.hpp: Library version string recorded in run manifests

#pragma once

#define FGRLAB_VERSION "0.1.0"
