#include "core_lib/core.h"
int core_lib_version(void) { return 1; }
