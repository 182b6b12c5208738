@problemName Empty
@univariate true
@seriesLength 3
@classLabel true a b
@data

# nothing follows
