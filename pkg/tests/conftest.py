from pathlib import Path

import pytest

from dedupkit.core import InvoiceRecord

GOLDEN_DIR = Path(__file__).parent / "data" / "golden"


def make_record(record_id: int, **overrides) -> InvoiceRecord:
    fields = dict(
        record_id=record_id,
        client_id="C01",
        invoice_number=f"INV-{record_id:04d}",
        invoice_date="2019-03-01",
        supplier_id=f"S{record_id:03d}",
        supplier_name="Acme Trading BV",
        amount_minor=12345,
        currency="EUR",
        description="office supplies",
    )
    fields.update(overrides)
    return InvoiceRecord(**fields)


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


# Acceptance results are collected here by test_acceptance and printed as a
# one-line-per-criterion table at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}")
