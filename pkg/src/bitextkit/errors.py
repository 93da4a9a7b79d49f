"""Exception hierarchy.

Two roots: :class:`BitextError` for problems with the data or the external
processes (CLI exit code 1) and :class:`ConfigError` for bad configuration or
usage (exit code 2).
"""


class BitextError(Exception):
    """Base class for data and processing errors."""


class ConfigError(Exception):
    """Base class for configuration errors."""


class ParseError(ConfigError):
    def __init__(self, path, line, column, message):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class ValidationError(ConfigError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnknownFilterId(ValidationError):
    def __init__(self, filter_id):
        super().__init__("filter.chain", f"unknown filter id {filter_id!r}")
        self.filter_id = filter_id


# corpus_io


class LineCountMismatch(BitextError):
    """Two streams that must stay line-aligned have different lengths."""

    retriable = False


class Utf8Error(BitextError):
    def __init__(self, path, line_no, reason):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: invalid UTF-8 ({reason})")


class TsvArityError(BitextError):
    def __init__(self, path, line_no, ncols):
        self.path = path
        self.line_no = line_no
        self.ncols = ncols
        super().__init__(f"{path}:{line_no}: expected 2 tab-separated columns, got {ncols}")


class TsvCellError(BitextError):
    """A cell destined for TSV output contains a tab."""


class LineBreakError(BitextError):
    """A sentence destined for output contains LF or CR."""


# noising / augment


class EmptyInput(BitextError):
    pass


class AlreadyTagged(BitextError):
    pass


class OriginMismatch(BitextError):
    pass


class TagCollision(BitextError):
    """The tag token already occurs in natural corpus text."""


class EmptyBothInputs(BitextError):
    pass


# bt_loop


class TranslatorError(BitextError):
    retriable = False


class TranslatorLineCountMismatch(TranslatorError, LineCountMismatch):
    retriable = True

    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"translator returned {got} lines for {expected} inputs")


class NonZeroExit(TranslatorError):
    def __init__(self, command, returncode, stderr):
        self.command = command
        self.returncode = returncode
        self.stderr = stderr
        tail = stderr.strip().splitlines()[-5:]
        detail = ("\n  " + "\n  ".join(tail)) if tail else ""
        super().__init__(f"{command[0]!r} exited with status {returncode}{detail}")


class Timeout(TranslatorError):
    retriable = True

    def __init__(self, command, seconds):
        self.command = command
        self.seconds = seconds
        super().__init__(f"{command[0]!r} timed out after {seconds}s")


# bleu


class LengthMismatch(BitextError):
    pass


class EmptyCorpus(BitextError):
    pass
