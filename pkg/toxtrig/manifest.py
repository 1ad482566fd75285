"""Run manifest: everything needed to rerun an extraction against a replay file."""
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from toxtrig import __version__
from toxtrig.corpus import write_text_file

log = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
TIMESTAMP_FIELDS = ('started', 'finished')


def now():
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


@dataclass
class RunManifest:
    command: str
    strategy: str
    settings: Dict[str, Any]
    seed: Optional[int]
    corpus_digest: str
    examples: List[str] = field(default_factory=list)
    documents: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    started: str = field(default_factory=now)
    finished: Optional[str] = None
    version: str = __version__

    def record(self, doc_id, **diagnostics):
        self.documents.setdefault(doc_id, {}).update(diagnostics)

    @property
    def failed_documents(self):
        return sorted(doc_id for doc_id, info in self.documents.items() if info.get('failed_sections'))

    def to_dict(self):
        data = asdict(self)
        data['documents'] = {doc_id: self.documents[doc_id] for doc_id in sorted(self.documents)}
        data['summary'] = {
            'documents': len(self.documents),
            'failed_documents': len(self.failed_documents),
            'failed_sections': sum(len(info.get('failed_sections', ())) for info in self.documents.values()),
            'hallucinated_phrases': sum(len(info.get('hallucinated_phrases', ())) for info in self.documents.values()),
            'line_break_phrases': sum(len(info.get('line_break_phrases', ())) for info in self.documents.values()),
            'overlaps_resolved': sum(info.get('overlaps_resolved', 0) for info in self.documents.values()),
        }
        return data

    def write(self, directory):
        self.finished = now()
        path = Path(directory) / MANIFEST_NAME
        write_text_file(path, json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + '\n')
        log.info('Wrote run manifest to %s', path)
        return path


def load_manifest(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def without_timestamps(data):
    return {key: value for key, value in data.items() if key not in TIMESTAMP_FIELDS}
