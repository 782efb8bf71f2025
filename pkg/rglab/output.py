"""
Write experiment CSVs, JSON summaries and the run manifest that accompanies each CSV.
"""
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

from . import __version__
from .records import CSV_COLUMNS, jsonable, result_to_json, result_to_row


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    config: dict
    base_seed: int
    started: str
    finished: str
    outputs: dict


class NoFile:
    """
    Place holder used when output goes to standard output; nothing to close.
    """
    def __enter__(self):
        return sys.stdout

    def __exit__(self, exc_type, exc_val, exc_tb):
        pass


def make_output(path):
    """
    Open the destination for writing, or standard output for None / '-'.
    """
    if path is None or path == '-':
        return NoFile()
    return open(path, 'w', newline='', encoding='utf-8')


def utc_now():
    return datetime.now(timezone.utc).isoformat()


def write_results_csv(stream, results):
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator='\n')
    writer.writeheader()
    for result in results:
        writer.writerow(result_to_row(result))


def write_json(stream, payload):
    json.dump(jsonable(payload), stream, indent=2, sort_keys=True)
    stream.write('\n')


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as stream:
        for block in iter(lambda: stream.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def summary_path(csv_path):
    root, _ = os.path.splitext(csv_path)
    return f'{root}.summary.json'


def manifest_path(csv_path):
    return f'{csv_path}.manifest.json'


def write_run(csv_path, results, config, base_seed, started):
    """
    Write the CSV, its JSON summary and the manifest naming both; '-' prints the CSV only.
    """
    with make_output(csv_path) as stream:
        write_results_csv(stream, results)
    if csv_path is None or csv_path == '-':
        return None

    with make_output(summary_path(csv_path)) as stream:
        write_json(stream, [result_to_json(r) for r in results])

    manifest = RunManifest(
        tool_version=__version__, config=jsonable(config), base_seed=base_seed,
        started=started, finished=utc_now(),
        outputs={path: file_digest(path) for path in (csv_path, summary_path(csv_path))})
    with make_output(manifest_path(csv_path)) as stream:
        write_json(stream, manifest)
    return manifest
