/* zcu102 sysroot headers */
