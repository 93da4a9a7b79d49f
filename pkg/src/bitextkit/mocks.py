"""Deterministic stand-ins for the external translator and trainer.

    python -m bitextkit.mocks rev-words {direction} {strategy} {beam_width} {temperature}
    python -m bitextkit.mocks echo {direction} {strategy}
    python -m bitextkit.mocks fail [code]
    python -m bitextkit.mocks short {direction} {strategy}
    python -m bitextkit.mocks noop-trainer {corpus_source} {corpus_target} {iteration}

Translators read lines on stdin and write one line per input on stdout.
"""

import sys


def _lines():
    data = sys.stdin.buffer.read().decode("utf-8")
    if data.endswith("\n"):
        data = data[:-1]
    return data.split("\n") if data else []


def _emit(lines):
    sys.stdout.buffer.write("".join(line + "\n" for line in lines).encode("utf-8"))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print(__doc__, file=sys.stderr)
        return 2
    mode, args = argv[0], argv[1:]
    if mode == "rev-words":
        _emit(" ".join(reversed(line.split())) for line in _lines())
    elif mode == "echo":
        _emit(_lines())
    elif mode == "short":
        _emit(_lines()[:-1])
    elif mode == "fail":
        _lines()
        print("mock translator failure", file=sys.stderr)
        return int(args[0]) if args else 1
    elif mode == "noop-trainer":
        import os

        for path in args[:2]:
            if not os.path.isfile(path):
                print(f"missing corpus {path}", file=sys.stderr)
                return 1
    else:
        print(f"unknown mode {mode!r}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
