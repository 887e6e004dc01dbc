# Models package
# This package contains request models of the API
