import json
import logging
import sys

import click
from pydantic import ValidationError

from uniexp.commands.bench import bench
from uniexp.commands.builders import model, validate
from uniexp.commands.experiments import diffusion, eyam
from uniexp.commands.kernels import expmv, musps, quantile
from uniexp.exceptions import ArtifactIOError, InputError, InternalError, UniexpError
from uniexp.settings import settings

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _fail(ctx: click.Context, error: UniexpError) -> None:
    click.echo(json.dumps(error.to_dict()), err=True)
    ctx.exit(error.exit_code)


class UniexpGroup(click.Group):
    """Command group mapping library errors to exit codes and a JSON envelope on stderr."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except UniexpError as exc:
            _fail(ctx, exc)
        except ValidationError as exc:
            detail = "; ".join(err["msg"].removeprefix("Value error, ") for err in exc.errors())
            _fail(ctx, InputError(detail))
        except OSError as exc:
            _fail(ctx, ArtifactIOError(str(exc)))
        except Exception as exc:
            logger.exception("unhandled error")
            _fail(ctx, InternalError(f"{type(exc).__name__}: {exc}"))


@click.group(cls=UniexpGroup)
@click.option(
    "--log-level",
    default=None,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Overrides UNIEXP_LOG_LEVEL.",
)
def cli(log_level):
    """Transient distributions of sparse CTMCs by the single positive series."""
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


cli.add_command(expmv)
cli.add_command(musps)
cli.add_command(quantile)
cli.add_command(model)
cli.add_command(validate)
cli.add_command(eyam)
cli.add_command(diffusion)
cli.add_command(bench)


def main():
    cli()


if __name__ == "__main__":
    main()
