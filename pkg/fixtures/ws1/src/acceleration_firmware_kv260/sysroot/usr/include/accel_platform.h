/* kv260 sysroot headers */
