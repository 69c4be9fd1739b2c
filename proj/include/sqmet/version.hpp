#pragma once

#define SQMET_VERSION_MAJOR 0
#define SQMET_VERSION_MINOR 1
#define SQMET_VERSION_PATCH 0
#define SQMET_VERSION "0.1.0"
