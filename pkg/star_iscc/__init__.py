"""star-iscc: STAR-RIS aided integrated sensing, computing and communication optimizer."""

__version__ = "0.1.0"
__author__ = "star-iscc contributors"
__license__ = "MIT"
