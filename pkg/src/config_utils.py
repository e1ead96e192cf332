'''
Module: config_utils.py

Helpers for the flat plain-text run configuration:

    # comment
    algorithm = madi
    env.frame_height = 48
    eval_tiers = clean, video_hard

Dotted keys nest, values stay strings until pydantic validates them, and lists
are comma separated.

Functions:
    - parse_config_text: `key = value` text to a nested dict.
    - load_config_file: Reads and parses a config file.
    - flatten / unflatten: Convert between nested dicts and dotted keys.
    - dump_config: The resolved `key = value` text of a RunConfig.
'''

from pathlib import Path
from src.core.errors import ConfigError
from src.models.model import RunConfig


def unflatten(flat: dict[str, str]) -> dict:

    '''
    Turns dotted keys into nested dictionaries.

    Raises:
        ConfigError: If a key is used both as a value and as a group.

    Example:
        >>> unflatten({'env.frame_height': '48', 'seed': '1'})
        {'env': {'frame_height': '48'}, 'seed': '1'}
    '''

    nested: dict = {}
    for key, value in flat.items():
        parts = key.split('.')
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Key '{key}' nests under '{part}', which already holds a value")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"Key '{key}' is a group and cannot hold a value")
        node[parts[-1]] = value
    return nested


def flatten(nested: dict, prefix: str = '') -> dict[str, object]:

    '''Inverse of `unflatten`: nested dictionaries to dotted keys.'''

    flat: dict[str, object] = {}
    for key, value in nested.items():
        name = f'{prefix}.{key}' if prefix else str(key)
        if isinstance(value, dict):
            flat.update(flatten(value, name))
        else:
            flat[name] = value
    return flat


def parse_config_text(text: str) -> dict:

    '''
    Parses `key = value` lines into a nested dictionary of strings.

    Blank lines and everything after `#` are ignored.

    Raises:
        ConfigError: On a line without `=`, an empty key or a repeated key.
    '''

    flat: dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"Line {number}: expected 'key = value', received '{raw_line.strip()}'")

        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f'Line {number}: empty key')
        if key in flat:
            raise ConfigError(f"Line {number}: key '{key}' is set more than once")
        flat[key] = value

    return unflatten(flat)


def load_config_file(path: Path | str) -> dict:

    '''
    Reads a config file.

    Raises:
        ConfigError: If the file does not exist or cannot be parsed.
    '''

    path = Path(path)
    if not path.exists():
        raise ConfigError(f'Config file not found at {path}')
    return parse_config_text(path.read_text(encoding='utf-8'))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ', '.join(_format_value(item) for item in value)
    return str(value)


def dump_config(config: RunConfig) -> str:

    '''Sorted `key = value` text that parses and validates back to `config`.'''

    flat = flatten(config.model_dump(mode='json'))
    return ''.join(f'{key} = {_format_value(flat[key])}\n' for key in sorted(flat))
