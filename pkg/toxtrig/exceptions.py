"""Errors raised by the toxtrig package."""


class ToxTrigError(Exception):
    """Base class for every error this package raises on purpose."""


class CorpusError(ToxTrigError):
    pass


class StandoffParseError(CorpusError):

    def __init__(self, message, line_number=None, source=None):
        self.line_number = line_number
        self.source = source
        where = ''
        if source is not None:
            where += '{}:'.format(source)
        if line_number is not None:
            where += 'line {}: '.format(line_number)
        elif where:
            where += ' '
        super().__init__(where + message)


class IntegrityError(CorpusError):

    def __init__(self, message, annotation_id=None):
        self.annotation_id = annotation_id
        if annotation_id is not None:
            message = '{}: {}'.format(annotation_id, message)
        super().__init__(message)


class SplitError(CorpusError):
    pass


class ConfigError(ToxTrigError):
    pass


class PromptError(ToxTrigError):
    pass


class ResponseParseError(ToxTrigError):

    def __init__(self, message, raw=None):
        self.raw = raw
        super().__init__(message)


class CompletionError(ToxTrigError):
    pass


class ReplayMissError(CompletionError):

    def __init__(self, prompt_hash):
        self.prompt_hash = prompt_hash
        super().__init__('No recorded response for prompt hash {}'.format(prompt_hash))


class EvaluationError(ToxTrigError):
    pass


class SamplingError(ToxTrigError):
    pass
