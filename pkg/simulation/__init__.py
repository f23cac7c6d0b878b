"""Flujos sintéticos con cambio de distribución y lectura/escritura CSV"""
