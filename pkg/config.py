"""
Configuración Global del Arnés SPDE de Capilaridad Dinámica
===========================================================
Este archivo contiene todas las constantes y parámetros por defecto del sistema:
solver de Galerkin, presets de flujo/ruido, ensembles Monte-Carlo, umbrales de
PASS y logging. Los archivos YAML de corrida solo sobreescriben estos valores.
"""

from pathlib import Path

# ==========================================
# RUTAS DEL PROYECTO
# ==========================================
PROJECT_ROOT = Path(__file__).parent.resolve()
MODULES_DIR = PROJECT_ROOT / "modules"
DATA_DIR = PROJECT_ROOT / "data"
CONFIGS_DIR = DATA_DIR / "configs"
RESULTS_DIR = PROJECT_ROOT / "results"
UTILS_DIR = PROJECT_ROOT / "utils"
TESTS_DIR = PROJECT_ROOT / "tests"
LOGS_DIR = PROJECT_ROOT / "logs"

# Crear directorios si no existen
for directory in [LOGS_DIR]:
    directory.mkdir(parents=True, exist_ok=True)


# ==========================================
# CONFIGURACIÓN DEL SOLVER DE GALERKIN
# ==========================================
class SolverDefaults:
    """Parámetros por defecto del integrador espectral"""

    DIM = 1
    N_PER_AXIS = 64          # Modos por eje (par, >= 4)
    EPSILON = 0.05           # Difusión
    DELTA = 0.0025           # Capilaridad dinámica
    DT = 1e-3
    T = 1.0
    SNAPSHOT_EVERY = 10      # Pasos entre snapshots
    DEALIAS = "two-thirds"
    SCHEME = "euler-maruyama-semi-implicit"

    # Cotas físicas de ε y δ
    MAX_EPSILON = 0.5
    MAX_DELTA = 0.5

    # Guardia de explosión numérica sobre ||u||_{L2}
    BLOWUP_NORM = 1e6

    # Tolerancias de las transformadas
    TRANSFORM_RTOL = 1e-12


# ==========================================
# CONFIGURACIÓN DE FLUJOS Y RUIDO
# ==========================================
class FluxDefaults:
    """Presets de flujo f(x, λ) = a(x) g(λ)"""

    PRESETS = ["burgers1d", "stream2d-smooth", "stream2d-rough"]
    DEFAULT_PRESET = "burgers1d"

    # Ancho base del mollifier gaussiano: σ(k) = σ0 · 2^{-k}
    SIGMA0 = 0.05

    # Tolerancias de compatibilidad geométrica
    DIVERGENCE_TOL = 1e-10
    STOKES_TOL = 1e-8

    # Caja de validación en λ
    LAMBDA_BOX = (-4.0, 4.0)
    LAMBDA_SAMPLES = 257


class NoiseDefaults:
    """Presets de la función de ruido Φ(x, λ)"""

    PRESETS = ["noise-const", "noise-linear", "noise-bounded"]
    DEFAULT_PRESET = "noise-linear"
    SIGMA = 0.3
    LINEAR_COEFF = 0.2
    BOUNDED_AMPLITUDE = 0.0


# ==========================================
# CONFIGURACIÓN DE ENSEMBLES
# ==========================================
class EnsembleConfig:
    """Configuración de los ensembles Monte-Carlo"""

    N_PATHS = 64
    MASTER_SEED = 20240601
    CHUNK_SIZE = 64          # Miembros por lote vectorizado
    SHOW_PROGRESS = True


# ==========================================
# UMBRALES DE VERIFICACIÓN
# ==========================================
class HarnessConfig:
    """Umbrales de PASS (valores documentados, nunca constantes ocultas)"""

    # Número de errores estándar tolerados en las cotas de energía
    ENERGY_SE_FACTOR = 3.0
    # Holgura relativa por redondeo en igualdades de energía
    FLOAT_RTOL = 1e-10

    # Estabilidad: variación máxima del cociente entre amplitudes
    STABILITY_MAX_VARIATION = 10.0
    STABILITY_AMPLITUDES = (1e-1, 1e-2, 1e-3, 1e-4)

    # Orden fuerte de Euler–Maruyama
    STRONG_ORDER_TARGET = 0.5
    STRONG_ORDER_TOL = 0.15

    # Residuo débil: factor mínimo de reducción bajo dt -> dt/4
    WEAK_RESIDUAL_MIN_FACTOR = 1.5


# ==========================================
# CONFIGURACIÓN CINÉTICA
# ==========================================
class KineticConfig:
    """Diagnósticos de la función cinética h = sign(u - λ)"""

    M_LAMBDA = 64
    L_FACTOR = 1.25          # L = 1.25 · max|u| sobre el ensemble
    THETA_MULTIPLES = (2, 4, 8, 16)
    MIN_TRANSLATION_SLOPE = 0.4
    # N por defecto: ceil(d/2 + 3)
    SOBOLEV_N = None


# ==========================================
# CONFIGURACIÓN DEL LÍMITE SINGULAR
# ==========================================
class LimitStudyConfig:
    """Estudio del límite ε, δ -> 0"""

    K_MIN = 2
    K_MAX = 6
    NEPS_BOUND = 1.0         # cota de δ_k / ε_k^2
    FV_MESH_N = 1024
    CFL = 0.45
    MODE = "reference"       # reference | self-convergence
    # Umbral del error final (proxy empírico, fijado tras la primera corrida)
    FINAL_ERROR_THRESHOLD = 0.5
    SNAPSHOT_INTERVAL = 0.05


# ==========================================
# CONFIGURACIÓN DE NO-DEGENERACIÓN
# ==========================================
class NondegeneracyConfig:
    """Estimador numérico de la condición de no-degeneración"""

    LAMBDA_BOX = (-1.0, 1.0)
    ETAS = (0.1, 0.05, 0.025)
    SPHERE_SAMPLES = 720
    M_LAMBDA = 4001
    MIN_XI_PRIME = 0.1
    # Fracción de |Λ| a partir de la cual se marca el flujo como degenerado
    DEGENERATE_FRACTION = 0.99
    STOKES_TRIALS = 100
    # Puntos x por eje donde se evalúa el símbolo
    GRID_N = 8


# ==========================================
# CONFIGURACIÓN DE LOGGING
# ==========================================
class LogConfig:
    """Configuración del sistema de logging"""

    LOG_FILE = LOGS_DIR / "spde_harness.log"
    LOG_LEVEL = "INFO"  # DEBUG, INFO, WARNING, ERROR, CRITICAL
    LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"

    # Rotación de logs
    LOG_ROTATION = "10 MB"
    LOG_RETENTION = "1 week"

    # Logs en consola
    CONSOLE_LOG = True


# ==========================================
# CONFIGURACIÓN DE RENDIMIENTO
# ==========================================
class PerformanceConfig:
    """Configuración de paralelismo"""

    USE_MULTIPROCESSING = True
    NUM_WORKERS = None       # None = os.cpu_count()
    FFT_WORKERS = 1          # hilos de scipy.fft por proceso


# ==========================================
# EXPORTAR CONFIGURACIONES
# ==========================================
CONFIG = {
    "solver": SolverDefaults,
    "flux": FluxDefaults,
    "noise": NoiseDefaults,
    "ensemble": EnsembleConfig,
    "harness": HarnessConfig,
    "kinetic": KineticConfig,
    "limit_study": LimitStudyConfig,
    "nondegeneracy": NondegeneracyConfig,
    "log": LogConfig,
    "performance": PerformanceConfig,
}


# ==========================================
# FUNCIÓN DE AYUDA
# ==========================================
def get_config(section: str = None):
    """
    Obtener configuración específica

    Args:
        section: Nombre de la sección (solver, flux, etc.)
                Si es None, retorna todas las configuraciones

    Returns:
        Clase de configuración o diccionario completo
    """
    if section is None:
        return CONFIG
    return CONFIG.get(section.lower())


def print_config():
    """Imprimir toda la configuración actual"""
    print("=" * 60)
    print("CONFIGURACIÓN DEL ARNÉS SPDE")
    print("=" * 60)
    for section_name, section_class in CONFIG.items():
        print(f"\n[{section_name.upper()}]")
        for attr in dir(section_class):
            if not attr.startswith("_"):
                value = getattr(section_class, attr)
                print(f"  {attr}: {value}")
    print("=" * 60)


if __name__ == "__main__":
    print_config()
