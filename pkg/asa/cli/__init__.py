from asa.cli.cli import main as main
