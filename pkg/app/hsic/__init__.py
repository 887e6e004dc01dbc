# HSIC package
# This package contains the unbiased HSIC estimator, its h-vectors, variance and covariance
