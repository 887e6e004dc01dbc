# Data package
# This package contains sample loading, validation and alignment
