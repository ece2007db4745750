"""Exception hierarchy shared by every stage of the pipeline."""


class ColsemError(Exception):
    """Base class; the CLI maps any subclass to exit code 2."""


class SqlSyntaxError(ColsemError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class DialectError(ColsemError):
    def __init__(self, construct, dialect):
        super().__init__(f"{construct} is not allowed in the {dialect} dialect")
        self.construct = construct
        self.dialect = dialect


class BindError(ColsemError):
    """A query does not fit the catalog it is bound against."""


class UnresolvedColumn(BindError):
    pass


class UnknownTable(BindError):
    pass


class UnknownAttribute(BindError):
    pass


class EvaluationError(ColsemError):
    pass


class TypeMismatch(EvaluationError):
    pass


class DivisionByZero(EvaluationError):
    pass


class NullInNullFreeMode(EvaluationError):
    pass


class ArityMismatch(ColsemError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TypeParseError(ColsemError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CatalogError(ColsemError):
    pass


class DanglingId(ColsemError):
    pass


class NameCollision(ColsemError):
    def __init__(self, name):
        super().__init__(f"generated relation name {name!r} collides with an existing name")
        self.name = name
