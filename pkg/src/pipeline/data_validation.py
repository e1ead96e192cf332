'''
Data Validation Module
----------------------
Validates parsed run configurations against the RunConfig pydantic model and
turns validation failures into a numbered, readable error report.
'''

import logging
from pydantic import ValidationError
from src.core.errors import ConfigError
from src.models.model import RunConfig

logger = logging.getLogger(__name__)


def format_validation_errors(error: ValidationError) -> str:

    '''
    Formats pydantic errors as numbered lines `1) <key> = <input>: <msg>`.

    Args:
        error (ValidationError): The exception raised by pydantic.

    Returns:
        str: One line per failed input, separated by new lines.
    '''

    output_errors = []
    for i, detail in enumerate(error.errors(), 1):
        key = '.'.join(str(part) for part in detail['loc']) or '<config>'
        output_errors.append(f"{i}) {key} = {detail['input']!r}: {detail['msg']}")
    return '.\n'.join(output_errors)


def validate_run_config(raw: dict) -> RunConfig:

    '''
    Validates a nested dictionary of config values.

    Args:
        raw (dict): Output of `parse_config_text`, possibly with CLI overrides.

    Returns:
        RunConfig: The validated configuration, defaults filled in.

    Raises:
        ConfigError: With the numbered error report when any input is invalid
            or unknown.
    '''

    bold, end_bold = '\033[1m', '\033[0m'

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        input_label = 'input has' if e.error_count() == 1 else 'inputs have'
        raise ConfigError(f'{e.error_count()} {input_label} failed validation of the '
                          f'{bold}run config{end_bold} requirements:\n'
                          f'{format_validation_errors(e)}') from e

    logger.info('Run config validated: algorithm=%s seed=%d', config.algorithm.value, config.seed)
    return config
