'''
Parameter sets: target-network EMA, parameter counting and the binary
checkpoint format.

Checkpoint layout (little-endian):

    b"MADI"  u8 version (=1)  u32 tensor count
    per tensor: u16 name length, UTF-8 name, u8 rank, u32 dims..., float32 data

Tensor names are `<group>/<parameter>`, e.g. `critic/q1.0.weight`.
'''

from collections import OrderedDict
from pathlib import Path
import logging
import struct
import numpy as np
import torch
import torch.nn as nn
from src.core.errors import CheckpointError, ShapeError

logger = logging.getLogger(__name__)

MAGIC = b'MADI'
VERSION = 1

ParamSet = OrderedDict  # name -> tensor


def ema_update(online: nn.Module, target: nn.Module, tau: float) -> None:

    '''
    target ← (1 − τ)·target + τ·online, parameter by parameter.

    Raises:
        ShapeError: If names or shapes of the two modules differ.
    '''

    online_params = dict(online.named_parameters())
    target_params = dict(target.named_parameters())
    if online_params.keys() != target_params.keys():
        raise ShapeError('Online and target parameter names differ')

    with torch.no_grad():
        for name, target_param in target_params.items():
            online_param = online_params[name]
            if online_param.shape != target_param.shape:
                raise ShapeError(f'Shape mismatch for {name}: {tuple(online_param.shape)} '
                                 f'vs {tuple(target_param.shape)}')
            target_param.mul_(1.0 - tau).add_(online_param, alpha=tau)


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def param_set(module: nn.Module) -> ParamSet:
    '''Detached CPU copy of a module's state.'''
    return OrderedDict((name, tensor.detach().cpu().clone()) for name, tensor in module.state_dict().items())


def checkpoint_save(param_sets: dict[str, ParamSet], path: Path | str) -> Path:

    '''Writes named parameter sets to `path` in the MADI binary format.'''

    path = Path(path)
    entries = [(f'{group}/{name}', tensor) for group, tensors in param_sets.items()
               for name, tensor in tensors.items()]

    chunks = [MAGIC, struct.pack('<B', VERSION), struct.pack('<I', len(entries))]
    for name, tensor in entries:
        encoded = name.encode('utf-8')
        data = tensor.detach().cpu().to(torch.float32).numpy()
        chunks.append(struct.pack('<H', len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack('<B', data.ndim))
        chunks.append(struct.pack(f'<{data.ndim}I', *data.shape))
        chunks.append(data.astype('<f4').tobytes())

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b''.join(chunks))
    logger.info('Saved checkpoint with %d tensors to %s', len(entries), path)
    return path


class _Reader:

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError('Checkpoint is truncated')
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def checkpoint_load(path: Path | str) -> dict[str, ParamSet]:

    '''
    Reads a checkpoint written by `checkpoint_save`.

    Raises:
        CheckpointError: On a wrong magic number or version, or a truncated file.
        FileNotFoundError: If `path` does not exist.
    '''

    reader = _Reader(Path(path).read_bytes())
    if reader.take(4) != MAGIC:
        raise CheckpointError(f'{path} is not a MADI checkpoint (bad magic)')
    (version,) = reader.unpack('<B')
    if version != VERSION:
        raise CheckpointError(f'Unsupported checkpoint version {version}, expected {VERSION}')
    (count,) = reader.unpack('<I')

    param_sets: dict[str, ParamSet] = {}
    for _ in range(count):
        (name_len,) = reader.unpack('<H')
        name = reader.take(name_len).decode('utf-8')
        (rank,) = reader.unpack('<B')
        dims = reader.unpack(f'<{rank}I') if rank else ()
        size = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(reader.take(4 * size), dtype='<f4').reshape(dims)
        group, _, param = name.partition('/')
        param_sets.setdefault(group, OrderedDict())[param] = torch.from_numpy(values.astype(np.float32))

    if reader.offset != len(reader.data):
        raise CheckpointError(f'{path} has trailing bytes after {count} tensors')
    return param_sets


def load_param_set(module: nn.Module, params: ParamSet, group: str = '') -> None:

    '''
    Copies a parameter set into `module`.

    Raises:
        CheckpointError: On missing or unexpected names or shape disagreement.
    '''

    state = module.state_dict()
    if state.keys() != params.keys():
        missing = sorted(set(state) - set(params))
        unexpected = sorted(set(params) - set(state))
        raise CheckpointError(f'Checkpoint group {group!r} does not fit the model: '
                              f'missing {missing}, unexpected {unexpected}')
    for name, tensor in params.items():
        if tuple(state[name].shape) != tuple(tensor.shape):
            raise CheckpointError(f'Shape disagreement for {group}/{name}: checkpoint '
                                  f'{tuple(tensor.shape)} vs model {tuple(state[name].shape)}')
    module.load_state_dict(OrderedDict((name, tensor.to(state[name].dtype)) for name, tensor in params.items()))
