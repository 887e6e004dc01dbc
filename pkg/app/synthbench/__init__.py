# Synthetic benchmark package
# This package contains the synthetic data generator and the Monte-Carlo experiments
