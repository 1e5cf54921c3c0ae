"""Domain services: math kernels, codecs, attacks, defense, games and the bench layer"""
