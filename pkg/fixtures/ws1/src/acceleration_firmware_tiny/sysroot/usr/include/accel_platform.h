/* tiny sysroot headers */
