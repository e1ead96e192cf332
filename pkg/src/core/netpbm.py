'''
Binary Netpbm codec: PPM (P6) for RGB frames and PGM (P5) for masks, maxval 255.
'''

from pathlib import Path
import numpy as np
from src.core.errors import ShapeError


def write_ppm(path: Path | str, pixels: np.ndarray) -> Path:

    '''Writes an H×W×3 uint8 image as binary PPM.'''

    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ShapeError(f'PPM needs an H×W×3 uint8 array, received {pixels.shape} {pixels.dtype}')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f'P6\n{pixels.shape[1]} {pixels.shape[0]}\n255\n'.encode('ascii')
    path.write_bytes(header + np.ascontiguousarray(pixels).tobytes())
    return path


def write_pgm(path: Path | str, values: np.ndarray) -> Path:

    '''
    Writes a 2-D array as binary PGM.

    uint8 input is written as is; float input is read as [0, 1] and scaled by 255.
    '''

    values = np.asarray(values)
    if values.ndim != 2:
        raise ShapeError(f'PGM needs a 2-D array, received {values.shape}')
    if values.dtype != np.uint8:
        values = np.clip(np.rint(values.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f'P5\n{values.shape[1]} {values.shape[0]}\n255\n'.encode('ascii')
    path.write_bytes(header + np.ascontiguousarray(values).tobytes())
    return path


def read_netpbm(path: Path | str) -> np.ndarray:

    '''
    Reads a binary P5/P6 file written by this module.

    Returns:
        np.ndarray: H×W (P5) or H×W×3 (P6) uint8 array.

    Raises:
        ValueError: If the magic number or maxval is unsupported.
    '''

    data = Path(path).read_bytes()
    tokens = []
    offset = 0
    while len(tokens) < 4:
        while data[offset:offset + 1].isspace():
            offset += 1
        end = offset
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[offset:end].decode('ascii'))
        offset = end
    offset += 1  # single whitespace before the raster

    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f'Only maxval 255 is supported, received {maxval}')
    if magic == 'P6':
        shape = (height, width, 3)
    elif magic == 'P5':
        shape = (height, width)
    else:
        raise ValueError(f'Unsupported Netpbm magic {magic!r}')
    return np.frombuffer(data, dtype=np.uint8, count=int(np.prod(shape)), offset=offset).reshape(shape)
