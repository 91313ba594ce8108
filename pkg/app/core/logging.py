import logging
import sys


def setup_logging(debug: bool = False, quiet: bool = False) -> logging.Logger:
    """
    Configurar logging da aplicação.

    Tudo vai para stderr: stdout fica reservado para dados.
    """
    if quiet:
        level = logging.WARNING
    else:
        level = logging.DEBUG if debug else logging.INFO

    logging.basicConfig(
        level=level,
        format='\033[36m[%(asctime)s]\033[0m \033[1m%(levelname)s\033[0m [%(name)s] - %(message)s',
        datefmt='%H:%M:%S',
        stream=sys.stderr,
        force=True  # Forçar reconfiguração se já foi configurado
    )

    # Reduzir verbosidade de bibliotecas de terceiros
    logging.getLogger('numexpr').setLevel(logging.WARNING)

    app_logger = logging.getLogger('dgalab')
    app_logger.setLevel(level)
    return app_logger
