/* zcu104 sysroot headers */
