# Makes src a package for Poetry script entrypoint
