"""Security bug report prediction with tuned learners and rebalanced data.

The pipeline: load or vectorize bug-report datasets, filter training rows
by security-keyword signal, tune classifier hyperparameters with
differential evolution, rebalance the rare class with SMOTE (optionally
DE-tuned), and score everything with pd / pf / g-measure.
"""

__version__ = "0.1.0"
