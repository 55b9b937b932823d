class StepjudgeError(Exception):
    """Base for everything this package raises on purpose."""


class TemplateError(StepjudgeError):
    """Template file unreadable, malformed, or failing its version hash."""


class VocabError(StepjudgeError):
    """Vocabulary missing tokens the serving contract requires."""


class CorpusError(StepjudgeError):
    """Corpus file unreadable or carrying malformed records."""


class RequestError(StepjudgeError):
    """A wire request the server must refuse; carries the reply category."""

    def __init__(self, message: str, category: str = "bad_request") -> None:
        super().__init__(message)
        self.category = category
