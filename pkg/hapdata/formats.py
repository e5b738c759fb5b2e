"""
Text codecs for AlleleMatrix.

HAP (bit-exact round trip)::

    HAP <S> <M>
    <sample_1>\t...\t<sample_M>
    <site_id>\t<tok_1>\t...\t<tok_M>      (S lines)

VCF subset: ``##`` meta lines are skipped, the ``#CHROM`` header names the samples, only the GT
field is read and every call must be phased (``a|b``). Each phase becomes its own column named
``<sample>_<phase>``; a site's alphabet is REF followed by the ALT alleles.
"""
import logging
import re
from pathlib import Path

import numpy as np

from hapdata.matrix import AlleleMatrix

logger = logging.getLogger(__name__)

HAP = "hap"
VCF = "vcf"
FORMATS = (HAP, VCF)

TOKEN_PATTERN = re.compile(r"[A-Za-z0-9_.*-]+")
_VCF_FIXED = ["#CHROM", "POS", "ID", "REF", "ALT", "QUAL", "FILTER", "INFO", "FORMAT"]
_CHROM_POS = re.compile(r"^([^:\s]+):(\d+)$")


class ParseError(ValueError):
    """Malformed matrix text; ``line`` is the 1-based line number of the problem."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _decode(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(1, f"input is not valid UTF-8 ({e})")


def _split_lines(text: str) -> list:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def detect_format(data) -> str:
    """Guess HAP or VCF from the first line."""
    if isinstance(data, str):
        head = data[:64]
    else:
        head = bytes(data[:64]).decode("utf-8", errors="ignore")
    if head.startswith("HAP "):
        return HAP
    if head.startswith("##") or head.startswith("#CHROM"):
        return VCF
    raise ParseError(1, "unrecognised header; expected 'HAP <S> <M>' or a VCF header")


def parse_matrix(data, fmt: str = HAP, alphabet=None) -> AlleleMatrix:
    """
    Parse HAP or VCF-subset text into an AlleleMatrix.

    Parameters:
    data (bytes or str): The file contents.
    fmt (str): "hap" or "vcf".
    alphabet (sequence of str): Optional declared alphabet for HAP input; every site then uses it
        and tokens outside it are rejected. VCF input declares its alphabets through REF/ALT.

    Returns:
    AlleleMatrix: The parsed cohort.

    Raises:
    ParseError: On malformed headers, ragged rows, undeclared tokens or unphased calls.
    """
    text = _decode(data)
    if fmt == HAP:
        return _parse_hap(text, alphabet)
    if fmt == VCF:
        return _parse_vcf(text)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_matrix(m: AlleleMatrix, fmt: str = HAP) -> bytes:
    """
    Serialise ``m`` as HAP or VCF-subset UTF-8 bytes.

    Only tokens are written. Parsing the output rebuilds site alphabets in order of first appearance
    unless the same declared alphabet is passed back to the parser, so a matrix with a declared alphabet
    that holds unused tokens or a different order reads back with equal tokens but different alphabets.
    """
    if fmt == HAP:
        return _write_hap(m)
    if fmt == VCF:
        return _write_vcf(m)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def read_matrix(path, fmt: str = None, alphabet=None) -> AlleleMatrix:
    """Read a matrix file, detecting the format from its header when ``fmt`` is None."""
    data = Path(path).read_bytes()
    fmt = fmt or detect_format(data)
    m = parse_matrix(data, fmt, alphabet=alphabet)
    logger.info("loaded %s: %d sites x %d samples", path, m.n_sites, m.n_samples)
    return m


def write_matrix_file(m: AlleleMatrix, path, fmt: str = HAP):
    Path(path).write_bytes(write_matrix(m, fmt))
    logger.info("wrote %s (%s): %d sites x %d samples", path, fmt, m.n_sites, m.n_samples)


def _parse_hap(text: str, alphabet) -> AlleleMatrix:
    lines = _split_lines(text)
    if not lines:
        raise ParseError(1, "empty input")

    header = lines[0].split(" ")
    if len(header) != 3 or header[0] != "HAP" or not header[1].isdigit() or not header[2].isdigit():
        raise ParseError(1, f"malformed header {lines[0]!r}; expected 'HAP <S> <M>'")
    n_sites, n_samples = int(header[1]), int(header[2])
    if n_sites < 1 or n_samples < 1:
        raise ParseError(1, "S and M must both be at least 1")

    if len(lines) < 2:
        raise ParseError(2, "missing sample id line")
    sample_ids = lines[1].split("\t")
    if len(sample_ids) != n_samples or any(not s for s in sample_ids):
        raise ParseError(2, f"expected {n_samples} non-empty sample ids, got {len(sample_ids)}")

    if len(lines) - 2 != n_sites:
        raise ParseError(min(len(lines), n_sites + 2) + 1,
                         f"expected {n_sites} site lines, got {len(lines) - 2}")

    declared = tuple(alphabet) if alphabet is not None else None
    declared_index = {t: k for k, t in enumerate(declared)} if declared is not None else None
    cells = np.empty((n_sites, n_samples), dtype=np.int32)
    site_ids, alphabets = [], []
    for j, line in enumerate(lines[2:]):
        line_no = j + 3
        fields = line.split("\t")
        if len(fields) != n_samples + 1:
            raise ParseError(line_no, f"expected {n_samples + 1} fields, got {len(fields)}")
        site_id, tokens = fields[0], fields[1:]
        if not site_id:
            raise ParseError(line_no, "empty site id")
        for token in tokens:
            if not TOKEN_PATTERN.fullmatch(token):
                raise ParseError(line_no, f"invalid token {token!r}")
        if declared_index is not None:
            index = declared_index
            site_alphabet = declared
        else:
            site_alphabet = tuple(dict.fromkeys(tokens))
            index = {t: k for k, t in enumerate(site_alphabet)}
        for i, token in enumerate(tokens):
            if token not in index:
                raise ParseError(line_no, f"token {token!r} is absent from the declared alphabet")
            cells[j, i] = index[token]
        site_ids.append(site_id)
        alphabets.append(site_alphabet)

    return AlleleMatrix(cells, alphabets, sample_ids, site_ids)


def _write_hap(m: AlleleMatrix) -> bytes:
    out = [f"HAP {m.n_sites} {m.n_samples}", "\t".join(m.sample_ids)]
    for j in range(m.n_sites):
        out.append("\t".join((m.site_ids[j], *m.row(j))))
    return ("\n".join(out) + "\n").encode("utf-8")


def _parse_vcf(text: str) -> AlleleMatrix:
    lines = _split_lines(text)
    header_at = None
    for k, line in enumerate(lines):
        if line.startswith("##"):
            continue
        if line.startswith("#CHROM"):
            header_at = k
        break
    if header_at is None:
        raise ParseError(1 if not lines else len(lines), "malformed header: missing #CHROM line")

    header = lines[header_at].split("\t")
    if header[:9] != _VCF_FIXED or len(header) < 10:
        raise ParseError(header_at + 1, "malformed #CHROM header; need the fixed columns and one sample")
    samples = header[9:]
    columns = [f"{s}_{phase}" for s in samples for phase in (0, 1)]

    site_ids, alphabets, rows = [], [], []
    for k, line in enumerate(lines[header_at + 1:], start=header_at + 2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ParseError(k, f"expected {len(header)} fields, got {len(fields)}")
        chrom, pos, ident, ref, alt = fields[:5]
        site_alphabet = [ref] + ([] if alt == "." else alt.split(","))
        for token in site_alphabet:
            if not TOKEN_PATTERN.fullmatch(token):
                raise ParseError(k, f"invalid allele {token!r}")
        if len(set(site_alphabet)) != len(site_alphabet):
            raise ParseError(k, "duplicate alleles in REF/ALT")
        keys = fields[8].split(":")
        if "GT" not in keys:
            raise ParseError(k, "FORMAT lacks a GT field")
        gt_at = keys.index("GT")

        row = []
        for value in fields[9:]:
            parts = value.split(":")
            if gt_at >= len(parts):
                raise ParseError(k, f"missing GT value in {value!r}")
            gt = parts[gt_at]
            if "/" in gt:
                raise ParseError(k, f"unphased genotype {gt!r}")
            alleles = gt.split("|")
            if len(alleles) != 2:
                raise ParseError(k, f"expected a diploid phased genotype, got {gt!r}")
            for allele in alleles:
                if not allele.isdigit() or int(allele) >= len(site_alphabet):
                    raise ParseError(k, f"allele {allele!r} is absent from the declared alphabet")
                row.append(int(allele))
        site_ids.append(ident if ident != "." else f"{chrom}:{pos}")
        alphabets.append(tuple(site_alphabet))
        rows.append(row)

    if not rows:
        raise ParseError(len(lines) + 1, "no variant records")
    return AlleleMatrix(np.array(rows, dtype=np.int32), alphabets, columns, site_ids)


def _write_vcf(m: AlleleMatrix) -> bytes:
    if m.n_samples % 2:
        raise ValueError("VCF output needs haplotype columns in pairs")
    samples = []
    for i in range(0, m.n_samples, 2):
        first, second = m.sample_ids[i], m.sample_ids[i + 1]
        if not (first.endswith("_0") and second.endswith("_1") and first[:-2] == second[:-2]):
            raise ValueError(f"columns {first!r}, {second!r} are not a '<sample>_0', '<sample>_1' pair")
        samples.append(first[:-2])

    out = ["##fileformat=VCFv4.2", "\t".join(_VCF_FIXED + samples)]
    for j in range(m.n_sites):
        site_id = m.site_ids[j]
        match = _CHROM_POS.match(site_id)
        if match:
            chrom, pos, ident = match.group(1), match.group(2), "."
        else:
            chrom, pos, ident = "0", str(j + 1), site_id
        alphabet = m.site_alphabets[j]
        alt = ",".join(alphabet[1:]) if len(alphabet) > 1 else "."
        row = m.cells[j]
        calls = [f"{row[i]}|{row[i + 1]}" for i in range(0, m.n_samples, 2)]
        out.append("\t".join([chrom, pos, ident, alphabet[0], alt, ".", "PASS", ".", "GT"] + calls))
    return ("\n".join(out) + "\n").encode("utf-8")
