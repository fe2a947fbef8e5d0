class SlukitError(Exception):
    """Base class for all toolkit errors."""


class GrammarError(SlukitError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{loc}: {message}"
        super().__init__(message)


class UndefinedSymbolError(GrammarError):
    def __init__(self, symbol, line=None):
        self.symbol = symbol
        super().__init__(f"undefined symbol {symbol!r}", line=line)


class DerivationDepthError(GrammarError):
    pass


class CorpusError(SlukitError):
    """Malformed utterance or JSONL record."""


class SymbolTableError(SlukitError):
    pass


class CodecError(SlukitError):
    pass


class UndefinedCorrelationError(SlukitError):
    pass


class PlanError(SlukitError):
    pass
