import os


class Config:
    # Output settings
    OUTPUT_DIRECTORY = os.environ.get('FIELDQ_OUTPUT_DIR', './output')
    LOG_LEVEL = os.environ.get('FIELDQ_LOG_LEVEL', 'INFO').upper()

    # Supported run-config file extensions
    SUPPORTED_CONFIG_EXTENSIONS = ['.ini', '.cfg', '.yaml', '.yml', '.json']

    # Quadrature defaults
    REL_TOL = float(os.environ.get('FIELDQ_REL_TOL', '1e-10'))
    ABS_TOL = float(os.environ.get('FIELDQ_ABS_TOL', '1e-14'))
    MAX_SUBDIVISIONS = int(os.environ.get('FIELDQ_MAX_SUBDIVISIONS', '2000'))
    TAIL_CUT = float(os.environ.get('FIELDQ_TAIL_CUT', '200'))

    # Grid defaults
    OMEGA_MIN = float(os.environ.get('FIELDQ_OMEGA_MIN', '0.01'))
    OMEGA_MAX = float(os.environ.get('FIELDQ_OMEGA_MAX', '100'))
    GRID_POINTS = int(os.environ.get('FIELDQ_POINTS', '400'))
    TAU_POINTS = int(os.environ.get('FIELDQ_TAU_POINTS', '50'))

    # Reservoir discretization
    N_MODES = int(os.environ.get('FIELDQ_N_MODES', '4000'))
    OMEGA_MAX_BATH = float(os.environ.get('FIELDQ_OMEGA_MAX_BATH', '4'))

    # Energy-density band
    ENERGY_OMEGA_MAX = float(os.environ.get('FIELDQ_ENERGY_OMEGA_MAX', '50'))
    TAIL_FRACTION_LIMIT = float(os.environ.get('FIELDQ_TAIL_FRACTION_LIMIT', '1e-2'))

    # CSV settings
    FLOAT_FORMAT = '%.17g'
    OUTPUT_FILES = {
        'permittivity': 'permittivity.csv',
        'spectra_E': 'spectra_E.csv',
        'spectra_H': 'spectra_H.csv',
        'oscillator_compare': 'oscillator_compare.csv',
        'energy_report': 'energy_report.csv',
        'report': 'report.txt',
        'summary': 'summary.json',
        'log': 'run.log',
    }

    @staticmethod
    def ensure_directories(output_directory=None):
        """Ensure the output directory exists and is writable"""
        directory = output_directory or Config.OUTPUT_DIRECTORY
        os.makedirs(directory, exist_ok=True)
        if not os.access(directory, os.W_OK):
            raise PermissionError(f"Output directory is not writable: {directory}")
        return directory
