"""Independence tests based on length-4 permutation pattern frequencies."""

__version__ = "0.1.0"
