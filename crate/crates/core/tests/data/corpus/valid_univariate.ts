# A small two-class univariate problem
@problemName Tiny
@timeStamps false
@missing false
@univariate true
@equalLength true
@seriesLength 4
@classLabel true 1 2
@data
0.1,0.2,0.3,0.4:1
1.0,2.0,3.0,4.0:2
-1,0,1e-3,2.5:1
