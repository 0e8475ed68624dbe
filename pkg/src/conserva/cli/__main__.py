"""Entry point for the CLI when run as a module."""

from .app import ConservaCLI


def main():
    """Main entry point"""
    cli = ConservaCLI()
    cli.execute()


if __name__ == "__main__":
    main()
