"""Spiking-neuron digital logic: gates, latches and flip-flops built from
Izhikevich neurons and conductance synapses."""

__version__ = "0.1.0"
