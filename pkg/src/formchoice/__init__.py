"""formchoice: bi-level adaptive conjoint engine.

Measures consumer preference for product form (continuous, visual,
nonlinear) jointly with preference for functional attributes (discrete,
linear) through paired-comparison surveys whose questions are chosen
adaptively while the respondent answers.
"""

__version__ = "0.1.0"
