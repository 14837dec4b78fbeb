"""textguard: anomaly-detection toolkit for adversarial NLP robustness."""

__version__ = "0.1.0"
