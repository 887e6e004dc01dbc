# Relative test package
# This package contains the dependent, independent and generalized relative dependency tests
