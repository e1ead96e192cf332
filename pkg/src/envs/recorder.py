'''
Episode recorder: dumps rendered frames as `frame_%06d.ppm` for visual inspection.
'''

from pathlib import Path
import logging
from src.core.frames import Frame
from src.core.netpbm import write_ppm

logger = logging.getLogger(__name__)


class EpisodeRecorder:

    '''Writes every recorded frame to `out_dir`, numbered from zero.'''

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.count = 0

    def record(self, frame: Frame) -> Path:
        path = write_ppm(self.out_dir / f'frame_{self.count:06d}.ppm', frame.pixels)
        self.count += 1
        return path

    def record_episode(self, env, policy, max_steps: int | None = None) -> float:

        '''
        Rolls out one episode of `policy(obs) -> action` in `env`, recording each frame.

        Returns:
            float: The undiscounted episode return.
        '''

        obs = env.reset()
        self.record(obs.newest)
        total, steps = 0.0, 0
        while not env.done and (max_steps is None or steps < max_steps):
            obs, reward, _ = env.step(policy(obs))
            self.record(obs.newest)
            total += reward
            steps += 1
        logger.info('Recorded %d frames to %s', self.count, self.out_dir)
        return total
