"""Speech corpus balancing, augmentation and demographic bias auditing."""

__version__ = "0.1.0"
