'''
Process-level settings read from the environment (or a `.env` file).

    MADI_SEED    overrides the --seed option of `train`
    MADI_DEVICE  torch device the agent is built on (default cpu)
'''

from pydantic_settings import BaseSettings, SettingsConfigDict


class LabSettings(BaseSettings):

    '''Environment overrides with the MADI_ prefix'''

    model_config = SettingsConfigDict(env_prefix='MADI_', env_file='.env', extra='ignore')

    seed: int | None = None
    device: str = 'cpu'
