# Configuration package
# This package contains the settings and logging configuration
