"""Financial opportunity detection in micro-blog posts with a stacked classifier."""

__version__ = "0.1.0"
