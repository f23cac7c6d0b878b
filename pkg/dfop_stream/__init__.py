"""
dfop_stream: aprendizaje de una sola pasada con factor de olvido
Mínimos cuadrados recursivos (DFOP / G-DFOP) para flujos con cambio de distribución
"""

__version__ = "1.0.0"
