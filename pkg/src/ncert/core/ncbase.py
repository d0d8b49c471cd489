import abc
import os
import sys


class NcertError(Exception):
    pass


class ContextMismatchError(NcertError):
    pass


class ShapeMismatchError(NcertError):
    pass


class PreconditionError(NcertError):
    pass


class SolverError(NcertError):
    pass


class ConsistencyError(NcertError):
    pass


class ParseError(NcertError):
    """
    Raised on malformed expressions or input documents.

    Parameters:
        message (str): What went wrong.
        position (int): Offset of the offending character, if known.
    """

    def __init__(self, message: str, position: int | None = None) -> None:
        if position is not None:
            message = f'{message} (at position {position})'
        super().__init__(message)
        self.position = position


class Parameters:
    """
    Options shared by the computations of the package.

    Parameters:
        clone (Parameters): A Parameters object to clone.
        **kwargs: The parameters.
    """

    def __init__(self, clone: 'Parameters' = None, **kwargs):
        if clone is not None:
            self.__dict__ = clone.__dict__.copy()

        self.__dict__.update(kwargs)

        if 'seed' not in self.__dict__:
            self.seed = 0

        if not isinstance(self.seed, int):
            raise ValueError('seed must be an integer.')

    def __str__(self) -> str:
        return str(self.__dict__)

    def __repr__(self) -> str:
        return str(self.__dict__)

    def get_params(self) -> dict:
        """
        Get the parameters.

        Returns:
            dict: A dictionary of the set parameters.
        """
        return self.__dict__


class Reporter:
    """
    An interface to report the JSON document of a computation.
    """

    def __enter__(self) -> 'Reporter':
        """
        Enter the context.

        Returns:
            self: The Reporter object.
        """
        self.open()
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> None:
        self.close()

    @abc.abstractmethod
    def open(self) -> None:
        pass

    @abc.abstractmethod
    def close(self) -> None:
        pass

    @abc.abstractmethod
    def write(self, content: str) -> None:
        """
        Write content to the report.

        Args:
            content (str): The content to write.

        Returns:
            None
        """
        pass


class StreamReporter(Reporter):
    """
    Reports to a text stream, stdout unless another stream is given.

    Parameters:
        stream: A writable text stream.
    """

    def __init__(self, stream=None) -> None:
        self._stream = stream

    def open(self) -> None:
        if self._stream is None:
            self._stream = sys.stdout

    def close(self) -> None:
        self._stream.flush()

    def write(self, content: str) -> None:
        self._stream.write(content)
        if not content.endswith('\n'):
            self._stream.write('\n')


class FileReporter(Reporter):
    """
    A class to report the output of a computation to a file.

    Parameters:
        path (str): The file to report to. Its directory must exist.
    """

    def __init__(self, path: str) -> None:
        self._file = self.__writeable(path)
        self._f = None

    def open(self) -> None:
        self._f = open(self._file, 'w')

    def close(self) -> None:
        self._f.close()

    def write(self, content: str) -> None:
        self._f.write(content)

    def __writeable(self, path: str) -> str:
        """
        Returns the file name to write to, checking its folder exists.
        """

        folder = os.path.dirname(os.path.abspath(path))
        if not os.path.exists(folder):
            raise FileNotFoundError(f'{folder} does not exist')

        return path
