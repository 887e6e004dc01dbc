# Kernels package
# This package contains Gram matrix construction and bandwidth selection
