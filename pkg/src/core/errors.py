'''
Exception hierarchy shared by every package of the lab.

Library code raises these; only the command line maps them to exit codes.
'''


class LabError(Exception):

    '''Base class for all lab errors'''


class ShapeError(LabError, ValueError):

    '''An array or tensor does not have the declared shape'''


class InsufficientDataError(LabError):

    '''Replay buffer holds fewer transitions than requested'''


class EpisodeFinishedError(LabError):

    '''Environment stepped after its episode reached the time limit'''


class CheckpointError(LabError):

    '''Checkpoint file is corrupt, truncated or does not fit the model'''


class ConfigError(LabError):

    '''Run configuration could not be read or failed validation'''


class StatisticsError(LabError, ValueError):

    '''A statistical test received degenerate samples'''


class MetricsError(LabError):

    '''Metric files of a run are missing or corrupt'''
