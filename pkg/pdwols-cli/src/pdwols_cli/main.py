"""Main entry point for the pdwols command."""

from rich.console import Console

from .cli import cli


def main() -> None:
    """Main entry point."""
    try:
        cli()
    except KeyboardInterrupt:
        console = Console(stderr=True)
        console.print("\n[yellow]Operation cancelled by user[/yellow]")
        raise SystemExit(130) from None


if __name__ == "__main__":
    main()
