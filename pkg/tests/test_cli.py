'''
Unit Tests for the command line.

The tests ensure that:
    1. A tiny training run writes config.resolved, train.csv, eval.csv,
       final.ckpt and the periodic masks, and repeats byte for byte.
    2. eval, masks, sensitivity, record and report work on the written run.
    3. Errors map to exit codes: 2 for configuration and metric problems,
       3 for I/O errors, 4 for checkpoint problems.
'''

import contextlib
import io
import tempfile
import unittest
from pathlib import Path
from src.cli import EXIT_CHECKPOINT, EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from src.core.netpbm import read_netpbm
from src.pipeline.data_handler import EVAL_COLUMNS, TRAIN_COLUMNS, load_metrics
from tests.helpers import tiny_config_text


def _run(argv: list[str]) -> tuple[int, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue()


class TestTrainCommand(unittest.TestCase):

    '''
    Tester for `train` and the commands that read its output (10 steps, eval every 5)
    '''

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.root = Path(cls.tmp.name)
        for algorithm in ('madi', 'sac'):
            config = cls.root / f'{algorithm}.cfg'
            config.write_text(tiny_config_text(algorithm), encoding='utf-8')
            code, _ = _run(['train', '--config', str(config), '--seed', '3', '--out', str(cls.root / algorithm)])
            assert code == EXIT_OK, f'{algorithm} training failed with exit code {code}'
        cls.madi_ckpt = str(cls.root / 'madi' / 'final.ckpt')
        cls.sac_ckpt = str(cls.root / 'sac' / 'final.ckpt')

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_run_files(self):
        run_dir = self.root / 'madi'
        for name in ('config.resolved', 'train.csv', 'eval.csv', 'final.ckpt',
                     'mask_step000005.pgm', 'mask_step000010.pgm'):
            self.assertTrue((run_dir / name).exists(), name)
        self.assertFalse((self.root / 'sac' / 'mask_step000005.pgm').exists())

    def test_metric_files(self):
        eval_df = load_metrics(self.root / 'madi' / 'eval.csv', EVAL_COLUMNS)
        self.assertEqual(list(eval_df['step']), [5, 5, 10, 10])
        self.assertEqual(list(eval_df['tier']), ['clean', 'video_hard'] * 2)
        train_df = load_metrics(self.root / 'madi' / 'train.csv', TRAIN_COLUMNS)
        self.assertEqual(list(train_df['step']), [5, 10])

    def test_resolved_config_keeps_overrides(self):
        text = (self.root / 'madi' / 'config.resolved').read_text(encoding='utf-8')
        self.assertIn('seed = 3\n', text)
        self.assertIn('algorithm = madi\n', text)

    def test_rerun_is_identical(self):
        config = self.root / 'madi.cfg'
        code, _ = _run(['train', '--config', str(config), '--seed', '3', '--out', str(self.root / 'madi_again')])
        self.assertEqual(code, EXIT_OK)
        for name in ('eval.csv', 'train.csv'):
            self.assertEqual((self.root / 'madi' / name).read_bytes(),
                             (self.root / 'madi_again' / name).read_bytes(), name)

    def test_eval(self):
        code, out = _run(['eval', '--ckpt', self.madi_ckpt, '--tier', 'video_easy', '--episodes', '1'])
        self.assertEqual(code, EXIT_OK)
        self.assertRegex(out, r'tier=video_easy mean_return=-?\d+\.\d{6}')

    def test_masks(self):
        out_dir = self.root / 'masks'
        code, out = _run(['masks', '--ckpt', self.madi_ckpt, '--tier', 'clean', '--frames', '1', '--out', str(out_dir)])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(sorted(p.name for p in out_dir.iterdir()), ['mask_0.pgm', 'masked_0.ppm', 'obs_0.ppm'])
        self.assertTrue((out_dir / 'mask_0.pgm').read_bytes().startswith(b'P5\n16 16\n255\n'))
        self.assertEqual(read_netpbm(out_dir / 'obs_0.ppm').shape, (16, 16, 3))
        self.assertIn('mask_task_mean=', out)

    def test_masks_need_masker(self):
        code, _ = _run(['masks', '--ckpt', self.sac_ckpt, '--tier', 'clean'])
        self.assertEqual(code, EXIT_CHECKPOINT)

    def test_sensitivity(self):
        out_dir = self.root / 'sensitivity'
        code, out = _run(['sensitivity', '--ckpt', self.sac_ckpt, '--tier', 'clean', '--out', str(out_dir)])
        self.assertEqual(code, EXIT_OK)
        self.assertTrue((out_dir / 'sensitivity_0.pgm').exists())
        self.assertIn('sensitivity_bg_mean=', out)

    def test_record(self):
        out_dir = self.root / 'episode'
        code, _ = _run(['record', '--ckpt', self.madi_ckpt, '--tier', 'distracting', '--out', str(out_dir)])
        self.assertEqual(code, EXIT_OK)
        # reset frame plus one per step of a 10-step episode
        self.assertEqual(len(list(out_dir.glob('frame_*.ppm'))), 11)

    def test_report(self):
        out_dir = self.root / 'reporting'
        code, _ = _run(['report', '--runs', str(self.root / 'madi'), str(self.root / 'sac'), '--out', str(out_dir)])
        self.assertEqual(code, EXIT_OK)
        self.assertTrue((out_dir / 'summary.csv').exists())

    def test_corrupt_checkpoint(self):
        run_dir = self.root / 'corrupt'
        run_dir.mkdir(exist_ok=True)
        (run_dir / 'config.resolved').write_bytes((self.root / 'madi' / 'config.resolved').read_bytes())
        (run_dir / 'final.ckpt').write_bytes(b'not a checkpoint')
        code, _ = _run(['eval', '--ckpt', str(run_dir / 'final.ckpt'), '--tier', 'clean'])
        self.assertEqual(code, EXIT_CHECKPOINT)

    def test_missing_checkpoint(self):
        code, _ = _run(['eval', '--ckpt', str(self.root / 'madi' / 'nowhere.ckpt'), '--tier', 'clean'])
        self.assertEqual(code, EXIT_IO)


class TestExitCodes(unittest.TestCase):

    '''
    Tester for argument and input errors
    '''

    def test_missing_config(self):
        code, _ = _run(['train', '--config', '/nonexistent/run.cfg'])
        self.assertEqual(code, EXIT_CONFIG)

    def test_invalid_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.cfg'
            path.write_text('algorithm = dreamer\n', encoding='utf-8')
            code, _ = _run(['train', '--config', str(path), '--out', tmp])
        self.assertEqual(code, EXIT_CONFIG)

    def test_unknown_tier(self):
        code, _ = _run(['eval', '--ckpt', 'x.ckpt', '--tier', 'psychedelic'])
        self.assertEqual(code, EXIT_CONFIG)

    def test_report_on_empty_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _ = _run(['report', '--runs', tmp, '--out', str(Path(tmp) / 'out')])
        self.assertEqual(code, EXIT_CONFIG)


if __name__ == '__main__':
    unittest.main()
