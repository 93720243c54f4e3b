"""Exception hierarchy shared by the harvester modules."""


class RellHarvestError(Exception):
    """Base class for all errors raised by this package."""


class DescriptionError(RellHarvestError):
    """A ReLL description could not be accepted."""


class DescriptionParseError(DescriptionError):
    """The description document is not well-formed XML."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class VocabularyError(DescriptionError):
    """Unknown element or attribute in a ReLL document."""


class ValidationError(DescriptionError):
    """A description violates a structural invariant."""

    def __init__(self, message, diagnostics=()):
        self.diagnostics = list(diagnostics)
        super().__init__(message)


class DanglingReferenceError(ValidationError):
    """A target or link-type reference is illegal or points at nothing declared."""


class AmbiguityError(RellHarvestError):
    """A URI matches more than one resource type."""

    def __init__(self, uri, matches):
        self.uri = uri
        self.matches = list(matches)
        names = ", ".join(f"{s}:{t}" for s, t in self.matches)
        super().__init__(f"{uri} matches several resource types: {names}")


class DocumentParseError(RellHarvestError):
    """A representation could not be parsed into a tree."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SelectorSyntaxError(RellHarvestError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class UnsupportedSelectorError(SelectorSyntaxError):
    """The selector uses an XPath construct outside the supported subset."""

    def __init__(self, construct, offset):
        self.construct = construct
        super().__init__(f"unsupported XPath feature {construct}", offset)


class NormalizationError(RellHarvestError):
    pass


class FetchError(RellHarvestError):
    pass


class ConfigurationError(RellHarvestError):
    pass


class TermError(RellHarvestError):
    """Malformed RDF term or quad."""


class RDFSyntaxError(RellHarvestError):
    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class QuerySyntaxError(RellHarvestError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class QueryError(RellHarvestError):
    pass


class RuleSetError(RellHarvestError):
    pass


class FixtureError(RellHarvestError):
    pass
