from .main import build_parser, EXIT_OK, EXIT_INPUT, EXIT_SOLVER
