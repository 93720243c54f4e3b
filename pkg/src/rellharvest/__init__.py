"""Harvest RDF from hypermedia services described in the ReLL XML vocabulary.

A description declares resource types, their representations and the
selectors that find links inside them. The crawler follows those links
from seed URIs and the mapping turns what it found into a layered RDF
dataset with one named graph per retrieved representation.
"""
from .errors import RellHarvestError
from .model import RellDescription, load_description, parse_description, validate_description

__version__ = "0.1.0"

__all__ = ["RellHarvestError", "RellDescription", "load_description", "parse_description",
           "validate_description", "__version__"]
