# Routes package
# This package contains the API routes of the test service
