"""
Command line interface: ``abundanza <command> ...``.

Data goes to stdout (or ``--output``); logs go to stderr. The exit code is 0
on success, 1 on an unexpected certified violation, 2 on bad input, 3 when
precision runs out and 4 when a resource budget is exceeded.
"""

import argparse
import contextlib
import logging
import sys

from . import ha, serializers, verifiers
from .arithmetic import Factorization, sigma_of_factorization
from .criticals import ca_diagnostics, ca_enumerate, sa_enumerate
from .envelope import lower_envelope, read_points_csv
from .exceptions import AbundanzaError, InputFormatError, UnexpectedViolation
from .realball import const_euler_gamma, exp_gamma
from .scan import RecordWriter
from .settings import LOG_FORMAT, LOG_LEVEL, OUTPUT_FORMATS, load_config

logger = logging.getLogger(__name__)


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML run config file")
    common.add_argument("--log-level", default=None, help=f"Logging level (default: {LOG_LEVEL})")
    common.add_argument("--format", choices=OUTPUT_FORMATS, default=None, help="Output format (default: csv)")
    common.add_argument("--output", default=None, help="Write data here instead of stdout")
    common.add_argument("--precision", type=int, default=None, help="Starting precision in bits")
    common.add_argument("--threads", type=int, default=None, help="Worker threads for range scans")
    common.add_argument(
        "--allow-ties",
        action="store_true",
        help="Group critical epsilons that stay equal at max precision instead of failing",
    )
    return common


def build_parser():
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="abundanza",
        description="Certified computations on colossally abundant and highest abundant numbers",
    )
    commands = parser.add_subparsers(dest="command", help="Available commands")

    ca = commands.add_parser("ca", help="Colossally abundant numbers")
    ca_commands = ca.add_subparsers(dest="ca_command")
    ca_list = ca_commands.add_parser("list", parents=[common], help="First N CA numbers")
    ca_list.add_argument("--count", type=int, required=True)
    ca_diag = ca_commands.add_parser("diagnostics", parents=[common], help="log n_(i-1)/log n_i and P(n_i)")
    ca_diag.add_argument("--count", type=int, required=True)
    ca_env = ca_commands.add_parser("envelope", parents=[common], help="CA numbers as an envelope up to H")
    ca_env.add_argument("--hi", type=int, required=True)

    ha_parser = commands.add_parser("ha", help="Highest abundant numbers")
    ha_commands = ha_parser.add_subparsers(dest="ha_command")
    ha_compute = ha_commands.add_parser("compute", parents=[common], help="HA numbers of R_s on [lo, hi]")
    ha_compute.add_argument("--lo", type=int, required=True)
    ha_compute.add_argument("--hi", type=int, required=True)
    ha_compute.add_argument("--s", default="0", help="Weight exponent, an exact rational such as 1 or 1/2")
    ha_compute.add_argument(
        "--figure",
        nargs="?",
        const="-",
        default=None,
        help="Also emit every point with the envelope (to PATH, or after the table)",
    )

    verify = commands.add_parser("verify", parents=[common], help="Certified inequality scans")
    verify.add_argument("criterion", choices=sorted(verifiers.CRITERIA))
    verify.add_argument("--lo", type=int, required=True)
    verify.add_argument("--hi", type=int, required=True)
    verify.add_argument("--records", default=None, help="Append certified records to this CSV file")
    verify.add_argument("--frontier", default=None, help="Resumable frontier file")
    verify.add_argument("--all-records", action="store_true", help="Certify and record every n")

    sa = commands.add_parser("sa", help="Superabundant numbers")
    sa_commands = sa.add_subparsers(dest="sa_command")
    sa_list = sa_commands.add_parser("list", parents=[common], help="SA numbers up to L")
    sa_list.add_argument("--limit", type=int, required=True)

    envelope = commands.add_parser("envelope", parents=[common], help="Lower envelope of a CSV point file")
    envelope.add_argument("--input", required=True, help="CSV with x,y_midpoint[,y_radius]")

    commands.add_parser("constants", parents=[common], help="γ, e^γ, c1 and c2 as balls")
    return parser


def configure_logging(level):
    logging.basicConfig(level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


@contextlib.contextmanager
def _output(config):
    if config.output is None:
        yield sys.stdout
        return
    with open(config.output, "w", newline="") as handle:
        yield handle


def _emit(config, serializer_class, objects, **context):
    rows = serializer_class(objects, many=True, **context).data
    with _output(config) as handle:
        serializers.render(rows, serializer_class.fields, config.format, handle)


# Commands


def cmd_ca_list(args, config):
    records = ca_enumerate(args.count, config.precision, config.max_precision, args.allow_ties)
    t_statistics = {
        record.index: ha.t_statistic(record.n, config.precision) for record in records if record.value >= 3
    }
    _emit(config, serializers.CaRecordSerializer, records, t_statistics=t_statistics)


def cmd_ca_diagnostics(args, config):
    records = ca_enumerate(args.count, config.precision, config.max_precision, args.allow_ties)
    _emit(config, serializers.CaDiagnosticSerializer, ca_diagnostics(records, config.precision))


def cmd_ca_envelope(args, config):
    report = ha.ca_via_envelope(
        args.hi, config.precision, config.max_precision, config.sieve_budget, threads=config.threads
    )
    _emit(config, serializers.CaEnvelopeSerializer, serializers.ca_envelope_rows(report))


def cmd_ha_compute(args, config):
    weight = ha.Weight.parse(args.s)
    report = ha.ha_numbers(
        args.lo,
        args.hi,
        weight,
        config.precision,
        config.max_precision,
        config.sieve_budget,
        threads=config.threads,
    )
    rows = serializers.HaSerializer(serializers.ha_rows(report), many=True).data
    with _output(config) as handle:
        serializers.render(rows, serializers.HaSerializer.fields, config.format, handle)
        if args.figure is None:
            return
        figure = ha.figure_data(args.lo, args.hi, weight, config.precision, config.max_precision)
        points = serializers.FigurePointSerializer(figure.points, many=True).data
        fields = serializers.FigurePointSerializer.fields
        if args.figure == "-":
            handle.write("\n")
            serializers.render(points, fields, config.format, handle)
        else:
            with open(args.figure, "w", newline="") as figure_handle:
                serializers.render(points, fields, config.format, figure_handle)


def cmd_verify(args, config):
    criterion = verifiers.get_criterion(args.criterion)
    options = dict(
        precision=config.precision,
        max_precision=config.max_precision,
        budget=config.sieve_budget,
        threads=config.threads,
        frontier=args.frontier,
        all_records=args.all_records,
    )
    if args.records:
        with RecordWriter(args.records, serializers.VerificationRecordSerializer.fields) as writer:
            result = verifiers.run_scan(
                criterion, args.lo, args.hi, writer=serializers.SerializedRecordWriter(writer), **options
            )
    else:
        result = verifiers.run_scan(criterion, args.lo, args.hi, **options)
    _emit(config, serializers.VerificationRecordSerializer, result.records)
    if result.violations:
        logger.info(f"{criterion.name}: certified violations {result.violations[:20]}")
    if result.unexpected:
        raise UnexpectedViolation(criterion.name, result.unexpected)


def cmd_sa_list(args, config):
    numbers = sa_enumerate(args.limit, config.sieve_budget)
    rows = [
        serializers.SaRow(index, n, sigma_of_factorization(Factorization.from_int(n)))
        for index, n in enumerate(numbers, start=1)
    ]
    _emit(config, serializers.SaSerializer, rows)


def cmd_envelope(args, config):
    try:
        with open(args.input, newline="") as handle:
            points = read_points_csv(handle, config.precision)
    except OSError as exc:
        raise InputFormatError(f"cannot read {args.input}: {exc}") from exc
    result = lower_envelope(points, max_precision=config.max_precision)
    _emit(config, serializers.EnvelopeVertexSerializer, serializers.envelope_rows(result))


def cmd_constants(args, config):
    c1, c2 = ha.ramanujan_constants(config.precision)
    rows = [
        serializers.ConstantRow("euler_gamma", const_euler_gamma(config.precision)),
        serializers.ConstantRow("exp_gamma", exp_gamma(config.precision)),
        serializers.ConstantRow("c1", c1),
        serializers.ConstantRow("c2", c2),
    ]
    _emit(config, serializers.ConstantSerializer, rows)


COMMANDS = {
    ("ca", "list"): cmd_ca_list,
    ("ca", "diagnostics"): cmd_ca_diagnostics,
    ("ca", "envelope"): cmd_ca_envelope,
    ("ha", "compute"): cmd_ha_compute,
    ("verify", None): cmd_verify,
    ("sa", "list"): cmd_sa_list,
    ("envelope", None): cmd_envelope,
    ("constants", None): cmd_constants,
}


def _resolve(args):
    sub = getattr(args, f"{args.command}_command", None) if args.command in ("ca", "ha", "sa") else None
    return COMMANDS.get((args.command, sub))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, "log_level", None))

    command = _resolve(args) if args.command else None
    if command is None:
        parser.print_help(sys.stderr)
        return 2

    try:
        config = load_config(
            args.config,
            precision=args.precision,
            threads=args.threads,
            format=args.format,
            output=args.output,
        )
        logger.debug(f"Run config: {config.as_dict()}")
        command(args, config)
        return 0
    except AbundanzaError as exc:
        if getattr(exc, "n", None) is not None:
            logger.error(f"{type(exc).__name__} at n={exc.n}: {exc}")
        else:
            logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
