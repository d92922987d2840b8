"""Small file helpers: validation errors, atomic writes, exact float text."""

import csv
import io
import json
import os
import tempfile


class DataError(ValueError):
    """Input file failed validation.

    Carries the offending path, 1-based line number and field so the CLI
    can print a line-numbered message.
    """

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ": ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


def fmt_float(x):
    """Shortest repr that round-trips to the same double."""
    return repr(float(x))


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(path, obj):
    atomic_write_text(path, dumps_json(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def read_csv(path, header):
    """Yield ``(line_number, row_dict)`` after checking the exact header."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            found = next(reader)
        except StopIteration:
            raise DataError("empty file, expected a header row", path, 1) from None
        if [h.strip() for h in found] != list(header):
            raise DataError(
                f"bad header {','.join(found)!r}, expected {','.join(header)!r}", path, 1
            )
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"expected {len(header)} columns, got {len(row)}", path, lineno
                )
            yield lineno, dict(zip(header, (c.strip() for c in row)))
