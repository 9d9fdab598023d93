"""
Row serializers for CSV and JSON output.

A serializer lists its output ``fields``; each field is read from a
``get_<field>`` method when there is one, otherwise from the attribute of the
same name. CSV and JSON are rendered from the same representation.
"""

import csv
import json
from dataclasses import dataclass

from .realball import RealBall


def ball_midpoint(ball):
    return ball.midpoint_str() if ball is not None else ""


def ball_radius(ball):
    return ball.radius_str() if ball is not None else ""


class RowSerializer:
    fields = ()

    def __init__(self, instance=None, many=False, **context):
        self.instance = instance
        self.many = many
        self.context = context

    def to_representation(self, obj):
        row = {}
        for name in self.fields:
            getter = getattr(self, f"get_{name}", None)
            row[name] = getter(obj) if getter is not None else getattr(obj, name)
        return row

    @property
    def data(self):
        if self.many:
            return [self.to_representation(obj) for obj in self.instance]
        return self.to_representation(self.instance)


# Colossally and superabundant numbers


class CaRecordSerializer(RowSerializer):
    fields = ("index", "n", "factorization", "epsilon_lower", "epsilon_upper", "quotient", "t_midpoint", "t_radius", "tie")

    def get_n(self, record):
        return record.value

    def get_factorization(self, record):
        return record.n.as_pairs()

    def get_epsilon_lower(self, record):
        return record.epsilon_interval[0].value.midpoint_str()

    def get_epsilon_upper(self, record):
        return record.epsilon_interval[1].value.midpoint_str()

    def get_quotient(self, record):
        return str(record.quotient_from_previous)

    def _t(self, record):
        statistics = self.context.get("t_statistics", {})
        return statistics.get(record.index)

    def get_t_midpoint(self, record):
        return ball_midpoint(self._t(record))

    def get_t_radius(self, record):
        return ball_radius(self._t(record))


class CaDiagnosticSerializer(RowSerializer):
    fields = ("index", "log_ratio_midpoint", "log_ratio_radius", "log_n_midpoint", "largest_prime")

    def get_log_ratio_midpoint(self, diagnostic):
        return diagnostic.log_ratio.midpoint_str()

    def get_log_ratio_radius(self, diagnostic):
        return diagnostic.log_ratio.radius_str()

    def get_log_n_midpoint(self, diagnostic):
        return diagnostic.log_n.midpoint_str()


@dataclass(frozen=True)
class SaRow:
    index: int
    n: int
    sigma: int


class SaSerializer(RowSerializer):
    fields = ("index", "n", "sigma")


@dataclass(frozen=True)
class CaEnvelopeRow:
    index: int
    n: int
    kind: str
    slope: RealBall | None


class CaEnvelopeSerializer(RowSerializer):
    fields = ("index", "n", "kind", "epsilon_midpoint", "epsilon_radius")

    def _epsilon(self, row):
        return -row.slope if row.slope is not None else None

    def get_epsilon_midpoint(self, row):
        return ball_midpoint(self._epsilon(row))

    def get_epsilon_radius(self, row):
        return ball_radius(self._epsilon(row))


def ca_envelope_rows(report):
    """One row per vertex; ``slope`` is the chord leaving it (None at the end)."""
    ca = set(report.ca_numbers)
    slopes = list(report.slopes) + [None]
    return [
        CaEnvelopeRow(index, n, "ca" if n in ca else "artefact", slope)
        for index, (n, slope) in enumerate(zip(report.vertices, slopes))
    ]


# HA numbers and plot data


@dataclass(frozen=True)
class HaRow:
    index: int
    n: int
    value: RealBall
    slope: RealBall | None
    slope_sign: object


class HaSerializer(RowSerializer):
    fields = ("index", "n", "R_s_midpoint", "R_s_radius", "slope_midpoint", "slope_radius", "slope_sign")

    def get_R_s_midpoint(self, row):
        return row.value.midpoint_str()

    def get_R_s_radius(self, row):
        return row.value.radius_str()

    def get_slope_midpoint(self, row):
        return ball_midpoint(row.slope)

    def get_slope_radius(self, row):
        return ball_radius(row.slope)

    def get_slope_sign(self, row):
        return str(row.slope_sign) if row.slope_sign is not None else ""


def ha_rows(report):
    """Row i carries the slope a_i of the chord ending at the i-th HA number."""
    slopes = (None,) + tuple(report.slopes)
    signs = (None,) + tuple(report.slope_signs)
    return [
        HaRow(index, n, value, slope, sign)
        for index, (n, value, slope, sign) in enumerate(zip(report.ha_numbers, report.values, slopes, signs))
    ]


class FigurePointSerializer(RowSerializer):
    fields = ("n", "value_midpoint", "value_radius", "vertex", "envelope_midpoint")

    def get_value_midpoint(self, point):
        return point.value.midpoint_str()

    def get_value_radius(self, point):
        return point.value.radius_str()

    def get_vertex(self, point):
        return int(point.vertex)

    def get_envelope_midpoint(self, point):
        return point.envelope.midpoint_str()


# Generic envelopes


@dataclass(frozen=True)
class EnvelopeRow:
    index: int
    point: object
    slope: RealBall | None


class EnvelopeVertexSerializer(RowSerializer):
    fields = ("index", "x", "y_midpoint", "y_radius", "slope_midpoint", "slope_radius")

    def get_x(self, row):
        x = row.point.x
        return x.midpoint_str() if isinstance(x, RealBall) else str(x)

    def get_y_midpoint(self, row):
        return row.point.y.midpoint_str()

    def get_y_radius(self, row):
        return row.point.y.radius_str()

    def get_slope_midpoint(self, row):
        return ball_midpoint(row.slope)

    def get_slope_radius(self, row):
        return ball_radius(row.slope)


def envelope_rows(result):
    slopes = list(result.slopes) + [None]
    return [
        EnvelopeRow(index, point, slope)
        for index, point, slope in zip(result.vertex_indices, result.vertices, slopes)
    ]


# Verification records and constants


class VerificationRecordSerializer(RowSerializer):
    fields = ("n", "sigma", "r0_mid", "r0_rad", "g_mid", "g_rad", "l0_mid", "l0_rad", "verdicts")

    def get_r0_mid(self, record):
        return record.robin_deficit.midpoint_str()

    def get_r0_rad(self, record):
        return record.robin_deficit.radius_str()

    def get_g_mid(self, record):
        return ball_midpoint(record.gronwall)

    def get_g_rad(self, record):
        return ball_radius(record.gronwall)

    def get_l0_mid(self, record):
        return ball_midpoint(record.lagarias)

    def get_l0_rad(self, record):
        return ball_radius(record.lagarias)

    def get_verdicts(self, record):
        return ";".join(f"{name}={decision}" for name, decision in sorted(record.verdicts.items()))


@dataclass(frozen=True)
class ConstantRow:
    name: str
    value: RealBall


class ConstantSerializer(RowSerializer):
    fields = ("name", "midpoint", "radius", "precision")

    def get_midpoint(self, row):
        return row.value.midpoint_str()

    def get_radius(self, row):
        return row.value.radius_str()

    def get_precision(self, row):
        return row.value.precision


# Rendering


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def _json_value(value):
    # exact integers go out as strings; nested pairs stay numeric
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    return value


def render(rows, fields, fmt, handle):
    """Write serialized ``rows`` (dicts) to ``handle`` as csv or json."""
    if fmt == "json":
        payload = [{name: _json_value(row[name]) for name in fields} for row in rows]
        handle.write(json.dumps(payload, indent=2, ensure_ascii=False))
        handle.write("\n")
        return
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_csv_cell(row[name]) for name in fields])


class SerializedRecordWriter:
    """Adapts a scan.RecordWriter to take VerificationRecords."""

    serializer_class = VerificationRecordSerializer

    def __init__(self, writer):
        self.writer = writer

    def write(self, records):
        self.writer.write(self.serializer_class(records, many=True).data)
