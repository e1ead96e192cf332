'''
Main orchestration page

Runs the lab's command line, e.g.

    uv run main.py train --config configs/madi.cfg --seed 0
    uv run main.py report --runs runs/*
'''

from src.cli import main


if __name__ == '__main__':
    raise SystemExit(main())
