#pragma once
// shared helpers for the acceleration examples
int core_lib_version(void);
