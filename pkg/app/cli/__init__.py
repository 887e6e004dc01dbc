# CLI package
# This package contains the command-line front end
