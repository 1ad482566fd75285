"""INI configuration: endpoint, sampling and matching settings.

Example `toxtrig.conf`:

    [llm]
    endpoint = https://example.openai.azure.com/openai/deployments/gpt
    model = gpt-4.1
    parallelism = 4

    [fewshot]
    k = 5
    seed = 42

    [tags]
    TABACO = TOBACCO
"""
import logging
from configparser import ConfigParser, Error as ConfigParserError
from pathlib import Path

from toxtrig.clients import DEFAULT_MAX_RETRIES, DEFAULT_PATH, DEFAULT_TIMEOUT, HttpCompletionClient
from toxtrig.combiner import CombinePolicy
from toxtrig.corpus import build_tag_map
from toxtrig.dictionary import DEFAULT_MIN_LABEL_RATIO
from toxtrig.exceptions import ConfigError, CorpusError
from toxtrig.llm import (
    DEFAULT_EXAMPLE_CHAR_BUDGET, DEFAULT_EXAMPLE_FORMAT, DEFAULT_K, DEFAULT_MODEL, DEFAULT_PARALLELISM,
    DEFAULT_SEED, DEFAULT_SYSTEM_TEXT, DEFAULT_TASK_INSTRUCTION, LlmRequestConfig, PromptTemplate,
)
from toxtrig.normalize import NormalizationPolicy

log = logging.getLogger(__name__)

CONFIG_FILES = ['/etc/toxtrig.conf', './toxtrig.conf']


def load_configuration(path=None):
    """Reads the default locations, then `path` (which must exist when given)."""
    cfg = ConfigParser(interpolation=None)
    # Keep [tags] keys as written.
    cfg.optionxform = str
    files = list(CONFIG_FILES)
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError('Configuration file {} does not exist.'.format(path))
        files.append(str(path))
    try:
        read = cfg.read(files, encoding='utf-8')
    except ConfigParserError as e:
        raise ConfigError('Invalid configuration: {}'.format(e)) from e
    log.debug('Configuration read from: %s', read or 'defaults only')
    return cfg


def _get(getter, section, option, override, fallback):
    if override is not None:
        return override
    try:
        return getter(section, option, fallback=fallback)
    except ValueError as e:
        raise ConfigError('[{}] {}: {}'.format(section, option, e)) from e


def request_config(cfg, k=None, seed=None, model=None):
    return LlmRequestConfig(
        model=_get(cfg.get, 'llm', 'model', model, DEFAULT_MODEL),
        temperature=_get(cfg.getfloat, 'llm', 'temperature', None, 0.0),
        top_p=_get(cfg.getfloat, 'llm', 'top_p', None, 1.0),
        max_tokens=_get(cfg.getint, 'llm', 'max_tokens', None, 4000),
        seed=_get(cfg.getint, 'fewshot', 'seed', seed, DEFAULT_SEED),
        k=_get(cfg.getint, 'fewshot', 'k', k, DEFAULT_K),
        example_char_budget=_get(cfg.getint, 'fewshot', 'example_char_budget', None, DEFAULT_EXAMPLE_CHAR_BUDGET),
        parallelism=_get(cfg.getint, 'llm', 'parallelism', None, DEFAULT_PARALLELISM),
    )


def prompt_template(cfg, assertion_variant=None):
    return PromptTemplate(
        system_text=_get(cfg.get, 'prompt', 'system_text', None, DEFAULT_SYSTEM_TEXT),
        task_instruction=_get(cfg.get, 'prompt', 'task_instruction', None, DEFAULT_TASK_INSTRUCTION),
        example_format=_get(cfg.get, 'prompt', 'example_format', None, DEFAULT_EXAMPLE_FORMAT),
        assertion_variant=_get(cfg.getboolean, 'fewshot', 'assertion_variant', assertion_variant, False),
    )


def normalization_policy(cfg):
    return NormalizationPolicy(
        case_fold=_get(cfg.getboolean, 'dictionary', 'case_fold', None, True),
        require_word_boundary=_get(cfg.getboolean, 'dictionary', 'require_word_boundary', None, True),
    )


def min_label_ratio(cfg, override=None):
    return _get(cfg.getfloat, 'dictionary', 'min_label_ratio', override, DEFAULT_MIN_LABEL_RATIO)


def tag_map(cfg):
    aliases = dict(cfg.items('tags')) if cfg.has_section('tags') else {}
    try:
        return build_tag_map(aliases)
    except CorpusError as e:
        raise ConfigError(str(e)) from e


def combine_policy(cfg, override=None):
    name = _get(cfg.get, 'combine', 'policy', override, CombinePolicy.UNION_SHORTER.value)
    try:
        return CombinePolicy(name.strip().lower().replace('-', '_'))
    except ValueError:
        raise ConfigError('Unknown combine policy {!r}; choose from {}'.format(
            name, ', '.join(p.value for p in CombinePolicy)))


def http_client(cfg):
    return HttpCompletionClient(
        endpoint=_get(cfg.get, 'llm', 'endpoint', None, None),
        path=_get(cfg.get, 'llm', 'path', None, DEFAULT_PATH),
        timeout=_get(cfg.getfloat, 'llm', 'timeout', None, DEFAULT_TIMEOUT),
        max_retries=_get(cfg.getint, 'llm', 'max_retries', None, DEFAULT_MAX_RETRIES),
    )


def snapshot(cfg):
    """Plain dict of every section read, for the run manifest."""
    return {section: dict(cfg.items(section)) for section in cfg.sections()}
